__version__ = '0.1.0'

from typing import Tuple  # noqa

from .config import ExperimentSpec as ExperimentSpec
from .config import ModelConfig as ModelConfig
from .config import TrainConfig as TrainConfig
from .config import load_config as load_config
from .dataset import Calendar as Calendar
from .dataset import Sample as Sample
from .dataset import Scaler as Scaler
from .dataset import WindowSpec as WindowSpec
from .dataset import fit_scaler as fit_scaler
from .dataset import make_paired_samples as make_paired_samples
from .dataset import make_samples as make_samples
from .dataset import split as split
from .evaluation import MetricsReport as MetricsReport
from .evaluation import case_study as case_study
from .evaluation import efficiency as efficiency
from .evaluation import evaluate as evaluate
from .exceptions import DataError as DataError
from .exceptions import NumericalError as NumericalError
from .exceptions import UrbanVideoError as UrbanVideoError
from .exceptions import UsageError as UsageError
from .ingest import CalibratedTrajectory as CalibratedTrajectory
from .ingest import calibrate as calibrate
from .ingest import calibrate_all as calibrate_all
from .ingest import clean as clean
from .ingest import parse_trajectories as parse_trajectories
from .model_baselines import HistoricalAverage as HistoricalAverage
from .model_baselines import copy_yesterday as copy_yesterday
from .model_baselines import historical_average as historical_average
from .model_nets import MODEL_REGISTRY as MODEL_REGISTRY
from .model_nets import Model as Model
from .model_nets import build_cnn as build_cnn
from .model_nets import build_convlstm as build_convlstm
from .model_nets import build_model as build_model
from .model_nets import build_multitask_df as build_multitask_df
from .model_nets import build_vluc_net as build_vluc_net
from .model_train import TrainHistory as TrainHistory
from .model_train import train as train
from .nn_gradcheck import gradcheck_all as gradcheck_all
from .nn_optim import count_params as count_params
from .rasterize import MeshSpec as MeshSpec
from .rasterize import VideoTensor as VideoTensor
from .rasterize import build_video as build_video
from .rasterize import density_frame as density_frame
from .rasterize import flow_frame as flow_frame
from .rasterize import grid_of as grid_of
from .rasterize import k_anonymize as k_anonymize
from .synthgen import SynthConfig as SynthConfig
from .synthgen import generate as generate
from .synthgen import make_closed_world as make_closed_world
from .tensor_io import export_grid_csv as export_grid_csv
from .tensor_io import read_video as read_video
from .tensor_io import write_video as write_video

__all__ = (
    # config
    'ExperimentSpec',
    'ModelConfig',
    'TrainConfig',
    'load_config',
    # dataset
    'Calendar',
    'Sample',
    'Scaler',
    'WindowSpec',
    'fit_scaler',
    'make_paired_samples',
    'make_samples',
    'split',
    # evaluation
    'MetricsReport',
    'case_study',
    'efficiency',
    'evaluate',
    # exceptions
    'DataError',
    'NumericalError',
    'UrbanVideoError',
    'UsageError',
    # ingest
    'CalibratedTrajectory',
    'calibrate',
    'calibrate_all',
    'clean',
    'parse_trajectories',
    # model_baselines
    'HistoricalAverage',
    'copy_yesterday',
    'historical_average',
    # model_nets
    'MODEL_REGISTRY',
    'Model',
    'build_cnn',
    'build_convlstm',
    'build_model',
    'build_multitask_df',
    'build_vluc_net',
    # model_train
    'TrainHistory',
    'train',
    # nn_gradcheck
    'gradcheck_all',
    # nn_optim
    'count_params',
    # rasterize
    'MeshSpec',
    'VideoTensor',
    'build_video',
    'density_frame',
    'flow_frame',
    'grid_of',
    'k_anonymize',
    # synthgen
    'SynthConfig',
    'generate',
    'make_closed_world',
    # tensor_io
    'export_grid_csv',
    'read_video',
    'write_video',
)  # type: Tuple[str, ...]
