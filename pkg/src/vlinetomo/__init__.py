"""Vector field tomography from V-line transforms."""
