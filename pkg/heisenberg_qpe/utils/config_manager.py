"""配置管理器：schema 默认值 + 用户 JSON 文件 + 命令行覆盖"""

import json
import os
from pathlib import Path
from typing import Any, Dict

from ..domain.errors import ConfigurationError
from ..domain.vo import ScenarioConfig
from .logger import logger

SCHEMA_FILE = Path(__file__).resolve().parents[2] / "_conf_schema.json"


class ConfigManager:
    """按优先级合并配置：命令行 > 配置文件 > schema 默认值"""

    def __init__(self, config_path: str | Path | None = None, schema_path: str | Path = SCHEMA_FILE):
        """初始化 ConfigManager

        Args:
            config_path: 用户 JSON 配置文件路径，可为空
            schema_path: 配置 schema 文件路径
        """
        self.schema_path = schema_path
        self.config_path = config_path
        self.schema: Dict[str, dict] = {}
        self.values: Dict[str, Any] = {}
        self._load_schema()
        self._load_config()

    def _load_schema(self):
        """读取 schema 中的默认值"""
        if not os.path.exists(self.schema_path):
            logger.warning(f"未找到配置 schema 文件: {self.schema_path}，使用内置默认值")
            return
        try:
            with open(self.schema_path, "r", encoding="utf-8") as f:
                self.schema = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"读取配置 schema 失败: {e}") from e
        for key, item in self.schema.items():
            if "default" in item:
                self.values[key] = item["default"]

    def _load_config(self):
        """读取用户配置文件并覆盖默认值"""
        if self.config_path is None:
            return
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"读取配置文件失败: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError("配置文件顶层必须是 JSON 对象")
        unknown = [k for k in data if self.schema and k not in self.schema]
        if unknown:
            logger.warning(f"配置文件中存在未知字段，已忽略: {unknown}")
        self.values.update({k: v for k, v in data.items() if k not in unknown})
        logger.info(f"加载了配置文件 {self.config_path}，共 {len(data)} 项")

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def override(self, **kwargs):
        """用命令行参数覆盖配置，值为 None 的参数视为未给出"""
        for key, value in kwargs.items():
            if value is not None:
                self.values[key] = value

    def scenario(self) -> ScenarioConfig:
        """构造并校验 ScenarioConfig"""
        try:
            scenario = ScenarioConfig.from_dict(self.values)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"配置不合法: {e}") from e
        if scenario.n_phi < 1:
            raise ConfigurationError("n_phi 必须 ≥ 1")
        if scenario.seeds < 1:
            raise ConfigurationError("seeds 必须 ≥ 1")
        if not scenario.delta_c or any(d <= 0 for d in scenario.delta_c):
            raise ConfigurationError("delta_c 必须为正数")
        if any(a <= b for a, b in zip(scenario.delta_c, scenario.delta_c[1:])):
            raise ConfigurationError("delta_c 列表必须严格递减")
        if scenario.workers < 1:
            raise ConfigurationError("workers 必须 ≥ 1")
        return scenario
