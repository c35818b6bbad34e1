from .backend import set_threads, get_threads, parallel_map
from .streams import stream_key, keyed_uniform, keyed_gumbel, generator
