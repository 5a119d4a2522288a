"""duet: a human-agent co-generation engine.

An agent breaks a goal into a task plan and mirrors it as a task-oriented
interface; user actions on that interface feed back into the plan through a
bidirectional context loop.
"""

__version__ = "0.1.0"
