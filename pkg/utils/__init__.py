# DefaultableVolTool - 工具函数
