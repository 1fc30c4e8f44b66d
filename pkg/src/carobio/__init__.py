"""Single-grasp cable routing: contact model, perception, preprocessing,
grasp voting, motion planning and a quasi-static routing simulator."""

__version__ = "0.1.0"
