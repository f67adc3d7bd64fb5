"""Day-ahead scheduling of cascaded hydroelectric reservoirs."""
