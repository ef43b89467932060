"""
稳定化自适应Benders分解引擎

该模块负责：
1. 结构化问题数据模型与整体LP组装
2. 标准Benders、自适应预言机Benders与水平集稳定化Benders
3. 多时间尺度随机电力系统投资规划实例生成
4. 基准对比命令行与实验轨迹输出
"""

__version__ = "1.0.0"
