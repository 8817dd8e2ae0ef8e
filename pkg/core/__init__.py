# DefaultableVolTool - 可违约股票期权定价与校准工具
