"""
检验注册机制
按 check_id 管理所有可以写进实验文件的数值检验
"""

import threading
import typing
from typing import Any, Callable, Dict, List, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .schemas import CheckOutcome

VALID_MODULES = ("geometry", "comparison", "diffusion", "bochner", "harmonic")


def _split_list(text: str, inner: Any) -> list:
    if typing.get_origin(inner) in (list, List):
        return [[t.strip() for t in row.split(",") if t.strip()] for row in text.split(";") if row.strip()]
    # 表达式里可能含逗号
    sep = ";" if inner is str else ","
    return [t.strip() for t in text.split(sep) if t.strip()]


class CheckParams(BaseModel):
    """
    检验参数的基类

    INI 中的数值列表写成逗号分隔, 二维列表再用分号分行; 字符串列表用分号分隔。
    未知字段直接拒绝。
    """

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="before")
    @classmethod
    def split_lists(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        out = dict(data)
        for name, field in cls.model_fields.items():
            value = out.get(name)
            if not isinstance(value, str):
                continue
            annotation = field.annotation
            if typing.get_origin(annotation) is typing.Union:
                args = [a for a in typing.get_args(annotation) if a is not type(None)]
                annotation = args[0] if len(args) == 1 else annotation
            if typing.get_origin(annotation) in (list, List):
                (inner,) = typing.get_args(annotation) or (str,)
                out[name] = _split_list(value, inner)
        return out


CheckFn = Callable[[Any, Any], CheckOutcome]


class CheckEntry(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    check_id: str
    module: str
    anchor: str = Field(..., min_length=1)
    description: str = ""
    params_model: Type[CheckParams]
    fn: CheckFn

    def listing(self) -> Dict[str, str]:
        return {
            "check_id": self.check_id,
            "module": self.module,
            "anchor": self.anchor,
            "description": self.description,
        }


class CheckRegistry:
    """检验注册器, 线程安全"""

    def __init__(self):
        self._checks: Dict[str, CheckEntry] = {}
        self._lock = threading.Lock()

    def register(
        self,
        check_id: str,
        module: str,
        anchor: str,
        params_model: Type[CheckParams],
        fn: CheckFn,
        description: str = "",
    ) -> CheckEntry:
        """
        注册检验

        Args:
            check_id: 实验文件中 [check:<id>] 使用的名字
            module: 所属模块, 见 VALID_MODULES
            anchor: 检验对应的结论名, 出现在 README 的检验索引中
            params_model: 参数模型
            fn: fn(context, params) -> CheckOutcome
        """
        if module not in VALID_MODULES:
            raise ValueError(f"Unknown module: {module}")
        entry = CheckEntry(
            check_id=check_id,
            module=module,
            anchor=anchor,
            description=description,
            params_model=params_model,
            fn=fn,
        )
        with self._lock:
            if check_id in self._checks:
                raise ValueError(f"Check already registered: {check_id}")
            self._checks[check_id] = entry
        return entry

    def get(self, check_id: str) -> Optional[CheckEntry]:
        return self._checks.get(check_id)

    def list_checks(self, module: Optional[str] = None) -> List[CheckEntry]:
        """
        按 check_id 排序的检验列表

        Args:
            module: 只列出该模块的检验; 未知模块返回空列表
        """
        with self._lock:
            entries = list(self._checks.values())
        if module is not None:
            entries = [e for e in entries if e.module == module]
        return sorted(entries, key=lambda e: e.check_id)

    def get_stats(self) -> Dict[str, Any]:
        with self._lock:
            per_module: Dict[str, int] = {}
            for entry in self._checks.values():
                per_module[entry.module] = per_module.get(entry.module, 0) + 1
            return {
                "registered_checks": len(self._checks),
                "per_module": dict(sorted(per_module.items())),
            }


# 全局检验注册器实例
_global_registry = CheckRegistry()


def get_check_registry() -> CheckRegistry:
    """获取全局检验注册器"""
    return _global_registry


def register_check(check_id: str, module: str, anchor: str, params_model: Type[CheckParams], description: str = ""):
    """把函数注册为检验的装饰器"""

    def decorator(fn: CheckFn) -> CheckFn:
        doc = (fn.__doc__ or "").strip().splitlines()
        _global_registry.register(check_id, module, anchor, params_model, fn, description or (doc[0] if doc else ""))
        return fn

    return decorator


def list_checks(module: Optional[str] = None) -> List[CheckEntry]:
    """列出检验的便捷函数"""
    return _global_registry.list_checks(module)


def get_registry_stats() -> Dict[str, Any]:
    return _global_registry.get_stats()
