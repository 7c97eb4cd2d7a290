"""Pretrained encoder adapters.

An encoder is any TorchScript module mapping a float32 waveform tensor of
shape (1, T) at 16 kHz to one embedding of shape (D,) or (1, D). The two
named encoders differ only in which checkpoint they load and the tag written
to the output header; the tag matters downstream because training defaults
key off it. Checkpoints are resolved from an explicit path first, then the
encoder's environment variable. D is read from the model's output at run
time, never assumed.
"""

import os
from dataclasses import dataclass

import numpy as np
import torch

from .errors import EncoderContract, MissingCheckpoint


@dataclass(frozen=True)
class EncoderSpec:
    name: str
    tag: str
    env_var: str


ENCODERS = {
    "ecapa": EncoderSpec("ecapa", "ecapa", "VTAD_ECAPA_CHECKPOINT"),
    "facodec": EncoderSpec("facodec", "facodec", "VTAD_FACODEC_CHECKPOINT"),
}


def resolve_checkpoint(encoder_name: str, explicit_path: str | None = None) -> str:
    """Find the checkpoint file for an encoder or explain how to provide one."""
    spec = ENCODERS.get(encoder_name)
    if spec is None:
        raise MissingCheckpoint(
            f"unknown encoder {encoder_name!r}, expected one of {sorted(ENCODERS)}"
        )
    path = explicit_path or os.environ.get(spec.env_var)
    if not path:
        raise MissingCheckpoint(
            f"no checkpoint for encoder {spec.name!r}: pass --checkpoint or set {spec.env_var}"
        )
    if not os.path.isfile(path):
        raise MissingCheckpoint(f"checkpoint {path!r} for encoder {spec.name!r} does not exist")
    return path


def load_encoder(path: str) -> torch.jit.ScriptModule:
    """Load a TorchScript checkpoint in inference mode."""
    try:
        model = torch.jit.load(path, map_location="cpu")
    except Exception as exc:
        raise MissingCheckpoint(f"checkpoint {path!r} is not a loadable TorchScript file: {exc}") from exc
    model.eval()
    return model


def encode(model: torch.jit.ScriptModule, waveform: np.ndarray) -> np.ndarray:
    """Run one utterance through the encoder and return a float64 (D,) vector."""
    tensor = torch.from_numpy(np.ascontiguousarray(waveform, dtype=np.float32)).unsqueeze(0)
    with torch.no_grad():
        out = model(tensor)
    if not isinstance(out, torch.Tensor):
        raise EncoderContract(f"encoder returned {type(out).__name__}, expected a tensor")
    vec = out.detach().cpu().squeeze()
    if vec.ndim != 1 or vec.shape[0] < 1:
        raise EncoderContract(f"encoder output has shape {tuple(out.shape)}, expected (D,) or (1, D)")
    arr = vec.numpy().astype(np.float64)
    if not np.isfinite(arr).all():
        raise EncoderContract("encoder produced non-finite values")
    return arr
