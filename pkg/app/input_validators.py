from typing import Sequence

from app.exceptions import ValidationError
from app.plan_io import parse_lurd


class InputValidator:
    @staticmethod
    def validate_lurd(text: str) -> str:
        """Strip whitespace and reject anything outside l, u, r, d in either case."""
        text = "".join(str(text).split())
        parse_lurd(text)
        return text

    @staticmethod
    def validate_positive(value, name: str = "value") -> float:
        try:
            num = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"Invalid number for {name}: {value}")
        if num <= 0:
            raise ValidationError(f"{name} must be positive, got {num}")
        return num

    @staticmethod
    def validate_choice(value: str, choices: Sequence[str], name: str = "value") -> str:
        value = str(value).lower()
        if value not in choices:
            raise ValidationError(f"{name} must be one of {', '.join(choices)}, got {value}")
        return value
