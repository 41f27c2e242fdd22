import numpy as np

from genrec.model import ModelConfig, TransformerModel, init_parameters


def tiny_transformer(seed=0, catalog_size=12, hidden_size=8, num_blocks=1,
                     num_heads=2, max_seq_len=16, weight_scale=None):
    """Small random transformer; optionally rescale weights away from init."""
    cfg = ModelConfig(catalog_size=catalog_size, hidden_size=hidden_size,
                      num_blocks=num_blocks, num_heads=num_heads,
                      dropout_rate=0.0, max_seq_len=max_seq_len)
    rng = np.random.default_rng(seed)
    params = init_parameters(cfg, rng)
    if weight_scale is not None:
        for k, v in params.items():
            if v.ndim == 2:
                params[k] = rng.normal(0.0, weight_scale,
                                       v.shape).astype(np.float32)
    return TransformerModel(params, cfg)

