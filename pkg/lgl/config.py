from pydantic import Field, model_validator

from models.schemas import AttnMode, LglOptions, Propagation, parse_config


class LglConfig(LglOptions):
    """Configuration of one LGL block: the variant-wide switches plus stage values."""

    channels: int = Field(..., ge=1)
    heads: int = Field(1, ge=1)
    sample_rate: int = Field(1, ge=1)
    local_branch: bool = True

    @model_validator(mode="after")
    def heads_divide_channels(self):
        if self.channels % self.heads:
            raise ValueError(f"heads {self.heads} does not divide channels {self.channels}")
        return self

    @classmethod
    def create(cls, **fields) -> "LglConfig":
        return parse_config(cls, fields)

    @classmethod
    def for_stage(
        cls, options: LglOptions, channels: int, heads: int, sample_rate: int, local_branch: bool = True
    ) -> "LglConfig":
        return cls.create(
            **options.model_dump(),
            channels=channels,
            heads=heads,
            sample_rate=sample_rate,
            local_branch=local_branch,
        )

    @property
    def hidden(self) -> int:
        return self.ffn_ratio * self.channels

    @property
    def has_cpe1(self) -> bool:
        return self.local_branch

    @property
    def has_cpe2(self) -> bool:
        return self.dual_cpe or not self.local_branch

    @property
    def has_prop_weights(self) -> bool:
        return (
            self.attn_mode is AttnMode.SPARSE
            and self.propagation is Propagation.TRANSPOSED_CONV
        )

    @property
    def second_ffn(self) -> str:
        return "ffn1" if self.share_ffn and self.local_branch else "ffn2"
