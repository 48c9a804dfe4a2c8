"""JSON Schemas for the files flowguard writes."""

_GRID_NUM = {"type": "array", "minItems": 16, "maxItems": 16,
             "items": {"type": "array", "minItems": 16, "maxItems": 16, "items": {"type": "number"}}}
_GRID_INT = {"type": "array", "minItems": 16, "maxItems": 16,
             "items": {"type": "array", "minItems": 16, "maxItems": 16,
                       "items": {"type": "integer", "minimum": 0}}}
_GRID_OPT = {"type": "array", "minItems": 16, "maxItems": 16,
             "items": {"type": "array", "minItems": 16, "maxItems": 16,
                       "items": {"type": ["number", "null"]}}}
_POINT = {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}}

FRAME_RECORD = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "FrameRecord",
    "type": "object",
    "required": ["index", "frame", "refreshed", "corner_count", "flow_vector_count", "foe", "foe_reason",
                 "residual_rms", "ttc_sums", "ttc_counts", "ttc_means", "sum_left", "sum_right",
                 "delta", "decision", "timing_ms", "vectors"],
    "additionalProperties": False,
    "properties": {
        "index": {"type": "integer", "minimum": 0},
        "frame": {"type": ["string", "null"]},
        "refreshed": {"type": "boolean"},
        "corner_count": {"type": "integer", "minimum": 0},
        "flow_vector_count": {"type": "integer", "minimum": 0},
        "foe": {"oneOf": [_POINT, {"type": "null"}]},
        "foe_reason": {"type": ["string", "null"]},
        "residual_rms": {"type": ["number", "null"], "minimum": 0},
        "ttc_sums": _GRID_NUM,
        "ttc_counts": _GRID_INT,
        "ttc_means": _GRID_OPT,
        "ttc_means_s": _GRID_OPT,
        "sum_left": {"type": "number", "minimum": 0},
        "sum_right": {"type": "number", "minimum": 0},
        "delta": {"type": "number", "minimum": -1, "maximum": 1},
        "decision": {"enum": ["forward", "turn_left", "turn_right"]},
        "timing_ms": {
            "type": "object",
            "required": ["detection", "flow", "foe", "ttc", "balance", "decision"],
            "additionalProperties": {"type": ["number", "null"]},
        },
        "vectors": {"type": "array",
                    "items": {"type": "array", "minItems": 4, "maxItems": 4, "items": {"type": "number"}}},
    },
    "if": {"properties": {"foe": {"type": "null"}}},
    "then": {"properties": {"foe_reason": {"type": "string"}}},
    "else": {"properties": {"foe_reason": {"type": "null"}}},
}

MANIFEST = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "SequenceManifest",
    "type": "object",
    "required": ["scene", "frames"],
    "properties": {
        "scene": {"type": "object"},
        "frames": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "foe", "obstacles"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "foe": _POINT,
                    "obstacles": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "ttc_frames", "bbox_px"],
                            "properties": {
                                "id": {"type": "integer"},
                                "ttc_frames": {"type": "number", "exclusiveMinimum": 0},
                                "bbox_px": {"type": "array", "minItems": 4, "maxItems": 4,
                                            "items": {"type": "number"}},
                            },
                        },
                    },
                },
            },
        },
    },
}
