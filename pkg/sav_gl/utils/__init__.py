"""
SAV-GL 工具函数

JSON 转换、序列化器、运行统计和受保护的数值操作。
"""

from typing import Optional

import numpy as np
from fastapi.encoders import jsonable_encoder

from .run_key import format_run_key, sanitize_stem
from .safe_oper import guarded_linalg
from .serializers import (
    FieldRawSerializer,
    FieldSnapshot,
    FieldTextSerializer,
    Serializer,
    TableauTextSerializer,
    dump_tableau,
    get_serializer,
    load_tableau,
)


def _finite_or_none(value: float) -> Optional[float]:
    value = float(value)
    return value if np.isfinite(value) else None


def jsonify(var):
    """把报告、数组和 numpy 标量转换为可 JSON 编码的对象"""
    if var is None:
        return None

    return jsonable_encoder(
        var,
        custom_encoder={
            np.ndarray: lambda v: jsonify(v.tolist()),
            np.floating: _finite_or_none,
            np.integer: int,
            np.bool_: bool,
            complex: lambda v: [v.real, v.imag],
            float: _finite_or_none,
        },
    )
