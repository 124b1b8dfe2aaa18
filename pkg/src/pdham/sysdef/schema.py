"""JSON schema shared by every command report."""

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "status", "items", "notes"],
    "additionalProperties": False,
    "properties": {
        "command": {"type": "string"},
        "status": {"enum": ["verified", "falsified", "unknown", "error"]},
        "items": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "expr", "verdict"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "expr": {"type": "string"},
                    "verdict": {"type": "string"},
                },
            },
        },
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}
