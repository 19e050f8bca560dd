"""
Common modules: exit statuses, logging, error handling and commands
"""
