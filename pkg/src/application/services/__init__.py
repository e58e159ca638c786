# Package marker for grodlab
