#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DefaultableVolTool 启动脚本
检查依赖后调用主程序
"""

import importlib
import os
import sys
import traceback

REQUIRED = ("numpy", "scipy", "pandas")


def check_dependencies() -> bool:
    """检查依赖，缺失时给出安装提示"""
    ok = True
    for name in REQUIRED:
        try:
            module = importlib.import_module(name)
            print(f"{name} 版本: {module.__version__}")
        except ImportError:
            print(f"错误: 未找到 {name}，请运行: pip install {name}")
            ok = False
    return ok


def main():
    """主函数"""
    try:
        # 添加项目根目录到Python路径
        current_dir = os.path.dirname(os.path.abspath(__file__))
        sys.path.insert(0, current_dir)

        if not check_dependencies():
            return 1

        from main import main as app_main

        return app_main()

    except KeyboardInterrupt:
        print("\n程序被用户中断")
        return 130
    except Exception as e:
        print(f"程序运行错误: {e}")
        print("\n详细信息:")
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
