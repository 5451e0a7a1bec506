from enum import Enum


SUBROUTINE_CN_MAP = {
    "qeep": "分箱特征值估计",
    "pencil": "矩阵束",
}

FAILURE_MODE_CN_MAP = {
    "none": "成功",
    "step1_empty_or_overfull": "首轮估计为空或过多",
    "step_c_mismatch": "跨阶匹配失败",
    "step_e_window": "估计落在窗口之外",
    "no_multiplier": "找不到可用乘子",
}

KAPPA_SEARCH_CN_MAP = {
    "largest": "取最大可用乘子",
    "random": "随机抽取可用乘子",
}


class Subroutine(Enum):
    QEEP = "qeep"
    PENCIL = "pencil"

    @property
    def cn(self) -> str:
        """获取子程序的中文描述"""
        return SUBROUTINE_CN_MAP[self.value]

    @classmethod
    def from_cn(cls, text: str):
        """根据中文描述返回对应的枚举实例，如果找不到返回 None"""
        for key, val in SUBROUTINE_CN_MAP.items():
            if val == text:
                return cls(key)
        return None


class FailureMode(Enum):
    NONE = "none"
    STEP1_EMPTY_OR_OVERFULL = "step1_empty_or_overfull"  # 返回 {0}
    STEP_C_MISMATCH = "step_c_mismatch"  # 返回上一阶估计
    STEP_E_WINDOW = "step_e_window"  # 返回上一阶估计
    NO_MULTIPLIER = "no_multiplier"  # 返回当前估计

    @property
    def cn(self) -> str:
        return FAILURE_MODE_CN_MAP[self.value]

    @property
    def failed(self) -> bool:
        return self is not FailureMode.NONE

    @classmethod
    def from_cn(cls, text: str):
        for key, val in FAILURE_MODE_CN_MAP.items():
            if val == text:
                return cls(key)
        return None


class KappaSearch(Enum):
    LARGEST = "largest"
    RANDOM = "random"

    @property
    def cn(self) -> str:
        return KAPPA_SEARCH_CN_MAP[self.value]

    @classmethod
    def from_cn(cls, text: str):
        for key, val in KAPPA_SEARCH_CN_MAP.items():
            if val == text:
                return cls(key)
        return None
