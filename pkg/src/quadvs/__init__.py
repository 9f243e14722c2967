"""Image-based visual servoing of a quadruped manipulator tracking a moving target.

Modules, bottom-up: :mod:`rotations`, :mod:`chain`, :mod:`model`,
:mod:`kinematics`, :mod:`features`, :mod:`observer`, :mod:`servo`,
:mod:`locomotion`, :mod:`arm_control`, :mod:`sim` and :mod:`harness`.
"""

__version__ = "0.1.0"
