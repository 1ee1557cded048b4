pytest_plugins = 'urban_video.pytest_plugin'
