"""Base class and utilities for data models"""
from logging import getLogger
from typing import List, Type, TypeVar

import numpy as np
from attr import Factory, asdict, define, fields_dict

from pywirtinger.constants import JsonDict, TableRow
from pywirtinger.converters import ensure_list, to_json_complex, to_json_number

T = TypeVar('T', bound='BaseModel')
logger = getLogger(__name__)


@define(auto_attribs=False)
class BaseModel:
    """Base class for data models"""

    @classmethod
    def from_json(cls: Type[T], value: JsonDict, **kwargs) -> T:
        """Initialize a single model object from a JSON record.

        Omits any invalid fields and ``None`` values, so defaults are used instead.
        """
        value = value or {}
        if isinstance(value, cls):
            return value

        cls_attrs = {k.lstrip('_'): v for k, v in fields_dict(cls).items()}
        valid_json = {
            k: v
            for k, v in value.items()
            if k in cls_attrs and cls_attrs[k].init is True and v is not None
        }
        return cls(**valid_json, **kwargs)

    @classmethod
    def from_json_list(cls: Type[T], value: List[JsonDict]) -> List[T]:
        """Initialize a list of model objects from a list of JSON records"""
        return [cls.from_json(item) for item in ensure_list(value)]

    @property
    def row(self) -> TableRow:
        """Get values and headers to display as a row in a table"""
        raise NotImplementedError

    def to_dict(self, **kwargs) -> JsonDict:
        """Convert this object to a JSON-compatible dict"""
        return asdict(self, value_serializer=_serialize_value, **kwargs)

    def __rich_repr__(self):
        """Omit default values and fields hidden from repr (arrays, nested points) from rich output"""
        for a in self.__attrs_attrs__:
            if a.name.startswith('_') or not a.repr:
                continue
            default = a.default.factory() if isinstance(a.default, Factory) else a.default
            yield a.name, getattr(self, a.name), default


def _serialize_value(_inst, _field, value):
    if isinstance(value, BaseModel):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        return [_serialize_value(None, None, v) for v in value.tolist()]
    if isinstance(value, complex):
        return to_json_complex(value)
    if isinstance(value, float):
        return to_json_number(value)
    return value

