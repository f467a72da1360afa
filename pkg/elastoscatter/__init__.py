"""3次元弾性半空間の散乱カーネルライブラリ"""

__version__ = "1.0.0"
