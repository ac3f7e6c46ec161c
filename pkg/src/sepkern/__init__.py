"""Separable-kernel integral operators on L_p spaces."""
