from .main import main, build_parser, COMMANDS
from .manifest import RunManifest, blob_hash, hash_inputs, MANIFEST_FILE
