import logging

cli_logger = logging.getLogger('urban_video.cli')
dataset_logger = logging.getLogger('urban_video.dataset')
eval_logger = logging.getLogger('urban_video.eval')
ingest_logger = logging.getLogger('urban_video.ingest')
nn_logger = logging.getLogger('urban_video.nn')
raster_logger = logging.getLogger('urban_video.raster')
train_logger = logging.getLogger('urban_video.train')
