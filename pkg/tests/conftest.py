import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "src" / "fockteleport" / "schemas"


@pytest.fixture
def validate():
    jsonschema = pytest.importorskip("jsonschema")
    import json

    store = {}
    for p in SCHEMA_DIR.glob("*.json"):
        doc = json.loads(p.read_text())
        store[doc["$id"]] = doc
    from referencing import Registry, Resource

    registry = Registry().with_resources((k, Resource.from_contents(v)) for k, v in store.items())

    def check(name, instance):
        schema = store[f"{name}.v1.json"]
        jsonschema.Draft202012Validator(schema, registry=registry).validate(instance)

    return check
