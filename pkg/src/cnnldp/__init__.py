"""CNN-assisted local-deadline-partition scheduling for multi-cell industrial URLLC."""
