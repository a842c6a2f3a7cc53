"""RIS-enabled computational radar coincidence imaging simulator."""
