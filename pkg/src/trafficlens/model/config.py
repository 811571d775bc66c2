"""Model hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class ModelConfig:
    """Desk-scale encoder-decoder defaults: 4 heads, width 32, 1+1 layers."""

    input_steps: int = 12
    output_steps: int = 12
    heads: int = 4
    width: int = 32
    encoder_layers: int = 1
    decoder_layers: int = 1
    ffn_multiplier: int = 2
    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 32
    patience: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.input_steps != 12 or self.output_steps != 12:
            raise ValueError("model is fixed at 12 input and 12 output steps")
        if self.heads < 1:
            raise ValueError("heads must be >= 1")
        if self.width % self.heads != 0:
            raise ValueError(f"width {self.width} must be divisible by heads {self.heads}")
        for name in ("width", "encoder_layers", "decoder_layers", "ffn_multiplier", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0 or self.patience < 0:
            raise ValueError("epochs and patience must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        return cls(**doc)
