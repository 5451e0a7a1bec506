"""文件读写工具类：CSV / JSON 导出与谱文件读取"""

import csv
import json
import os
import sys
from pathlib import Path
from typing import Iterable

from ..domain.errors import ConfigurationError, InvalidSpectrumError
from ..domain.vo import Spectrum
from .logger import logger


class FileUtils:
    """文件处理工具类，path 为 None 时写到 stdout"""

    def __init__(self, save_dir: str | Path = "."):
        self.save_dir = save_dir

    def _resolve(self, path: str | Path) -> str:
        full = os.path.join(self.save_dir, path)
        parent = os.path.dirname(full)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return full

    def write_csv(self, path: str | Path | None, header: list[str], rows: Iterable[list]) -> None:
        """写 CSV，行尾固定为 \\n，保证同样的数据得到同样的字节"""
        if path is None:
            self._write_rows(sys.stdout, header, rows)
            return
        dest = self._resolve(path)
        with open(dest, "w", encoding="utf-8", newline="") as f:
            self._write_rows(f, header, rows)
        logger.info(f"文件已保存: {dest}")

    @staticmethod
    def _write_rows(stream, header, rows):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    def read_csv(self, path: str | Path, header: list[str] | None = None) -> list[dict]:
        """读取 CSV 为字典列表，给出 header 时检查表头完全一致"""
        try:
            with open(os.path.join(self.save_dir, path), "r", encoding="utf-8", newline="") as f:
                reader = csv.DictReader(f)
                if header is not None and reader.fieldnames != header:
                    raise ConfigurationError(
                        f"CSV 表头不符: 期望 {','.join(header)}，实际 {reader.fieldnames}"
                    )
                return list(reader)
        except OSError as e:
            raise ConfigurationError(f"读取 CSV 失败: {e}") from e

    def write_json(self, path: str | Path | None, data: dict) -> None:
        text = json.dumps(data, ensure_ascii=False, indent=2)
        if path is None:
            print(text)
            return
        dest = self._resolve(path)
        with open(dest, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        logger.info(f"文件已保存: {dest}")

    def load_spectrum(self, path: str | Path) -> Spectrum:
        """读取 {"lines": [{"phase": .., "prob": ..}, ...]}"""
        try:
            with open(os.path.join(self.save_dir, path), "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"读取谱文件失败: {e}") from e
        try:
            spectrum = Spectrum.from_dict(data)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidSpectrumError):
                raise
            raise InvalidSpectrumError(f"谱文件格式错误: {e}") from e
        logger.info(f"加载了 {spectrum.n_phi} 条谱线: {path}")
        return spectrum
