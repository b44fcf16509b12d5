"""Domain-neutral building blocks: sieves, ball arithmetic, exact cyclotomic values."""

from app.utils.cyclotomic import CyclotomicNumber
from app.utils.intervals import ErrorInterval

__all__ = ["CyclotomicNumber", "ErrorInterval"]
