# Source Package
