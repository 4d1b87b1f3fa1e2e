# Integration tests for CoughScreen
