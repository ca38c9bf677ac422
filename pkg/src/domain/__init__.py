# Domain Layer - Core Entities and Ports
"""
This module contains the domain entities (Chimera graphs, instances, runs,
hardness reports, anneal records, campaigns) and the abstract ports the
application layer drives. Entities depend on numpy only.
"""
