import re
from typing import Optional

_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def format_run_key(scheme: str, model: str, steps: Optional[int] = None, tau: Optional[float] = None) -> str:
    """
    生成运行标识，同时用作输出文件名前缀

    :param scheme: 格式名
    :param model: 模型名
    :param steps: 步数 K
    :param tau: 步长
    :return: 例如 ``savgl2_allen_cahn_K80``
    """
    parts = [scheme, model]
    if steps is not None:
        parts.append(f"K{steps}")
    elif tau is not None:
        parts.append(f"tau{tau:g}")
    return sanitize_stem("_".join(parts))


def sanitize_stem(stem: str) -> str:
    """把任意字符串变成安全的文件名片段"""
    cleaned = _UNSAFE.sub("-", stem.strip()).strip("-")
    return cleaned or "run"
