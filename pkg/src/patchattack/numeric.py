"""Dual-mode scalar arithmetic: exact rationals or 64-bit floats."""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

Number = Union[int, float, Fraction]


class Arithmetic(str, enum.Enum):
    RATIONAL = "rational"
    FLOAT = "float"


FLOAT_TOL = 1e-9


class NonFiniteError(ValueError):
    """A NaN or infinite value where a finite number is required."""


def parse_number(text: str | Number, mode: Arithmetic = Arithmetic.RATIONAL) -> Number:
    """Parse ``"3"``, ``"-0.25"``, ``"7/8"`` or a numeric literal into the mode's scalar type.

    Decimals are read exactly in rational mode (``"0.1"`` becomes ``1/10``).
    """
    mode = Arithmetic(mode)
    if isinstance(text, bool):
        raise ValueError(f"not a number: {text!r}")
    if isinstance(text, str):
        s = text.strip()
        if s.lower().lstrip("+-") in ("nan", "inf", "infinity"):
            raise NonFiniteError(f"non-finite value: {text!r}")
        try:
            value = Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a number: {text!r}") from exc
    elif isinstance(text, float):
        if not math.isfinite(text):
            raise NonFiniteError(f"non-finite value: {text!r}")
        value = Fraction(text) if mode is Arithmetic.RATIONAL else text
    elif isinstance(text, (int, Fraction, np.integer)):
        value = Fraction(int(text)) if isinstance(text, np.integer) else Fraction(text)
    elif isinstance(text, np.floating):
        return parse_number(float(text), mode)
    else:
        raise ValueError(f"not a number: {text!r}")
    return convert(value, mode)


def convert(value: Number, mode: Arithmetic) -> Number:
    mode = Arithmetic(mode)
    if mode is Arithmetic.RATIONAL:
        if isinstance(value, float):
            if not math.isfinite(value):
                raise NonFiniteError(f"non-finite value: {value!r}")
            return Fraction(value)
        return Fraction(value)
    out = float(value)
    if not math.isfinite(out):
        raise NonFiniteError(f"non-finite value: {value!r}")
    return out


def as_array(values: Iterable, mode: Arithmetic) -> np.ndarray:
    """Vector/matrix in the mode's representation (object array of Fractions, or float64)."""
    mode = Arithmetic(mode)
    if (mode is Arithmetic.FLOAT and isinstance(values, np.ndarray)
            and values.dtype.kind in "fiu"):
        out = values.astype(np.float64)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError("non-finite value in array")
        return out
    arr = np.asarray(values, dtype=object)
    flat = [parse_number(v, mode) for v in arr.ravel()]
    if mode is Arithmetic.RATIONAL:
        out = np.empty(len(flat), dtype=object)
        out[:] = flat
        return out.reshape(arr.shape)
    return np.asarray(flat, dtype=np.float64).reshape(arr.shape)


def array_mode(arr: np.ndarray) -> Arithmetic:
    return Arithmetic.RATIONAL if arr.dtype == object else Arithmetic.FLOAT


def tolerance(mode: Arithmetic) -> Number:
    mode = Arithmetic(mode)
    return Fraction(0) if mode is Arithmetic.RATIONAL else FLOAT_TOL


def format_number(value: Number) -> str:
    """Text form that round-trips through :func:`parse_number`."""
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def to_jsonable(value: Number):
    if isinstance(value, Fraction):
        return format_number(value)
    return float(value)
