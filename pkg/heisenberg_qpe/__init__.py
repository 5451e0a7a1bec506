"""多相位 Heisenberg 极限相位估计模拟器"""

__version__ = "1.0.0"
