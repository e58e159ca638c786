# Domain ports/interfaces for grodlab.
