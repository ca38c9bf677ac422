# Application Layer - Analysis Services
"""
This module contains the application layer services: the parallel-tempering
engine, mixing-time escalation, landscape and J-chaos analyses, time-to-solution
scaling and the campaign pipeline. Services drive the domain ports and never
touch files directly.
"""
