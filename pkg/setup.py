import pathlib
import re
import sys

from setuptools import setup

if sys.version_info < (3, 8):
    raise RuntimeError("urban_video requires Python 3.8+")

here = pathlib.Path(__file__).parent

txt = (here / 'urban_video' / '__init__.py').read_text('utf-8')
try:
    version = re.findall(r"^__version__ = '([^']+)'\r?$",
                         txt, re.M)[0]
except IndexError:
    raise RuntimeError('Unable to determine version.')

install_requires = [
    'attrs>=20.1.0',
    'numpy>=1.22,<3.0',
    'pandas>=1.5,<3.0',
    'tomli>=1.1.0; python_version<"3.11"',
]


def read(f):
    return (here / f).read_text('utf-8').strip()

args = dict(
    name='urban_video',
    version=version,
    description='Citywide crowd density and flow video benchmark',
    long_description='\n\n'.join(read('README.md')),
    classifiers=[
        'Intended Audience :: Science/Research',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
        'Development Status :: 3 - Alpha',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
    license='Apache 2',
    packages=['urban_video'],
    python_requires='>=3.8',
    install_requires=install_requires,
    include_package_data=True,
    entry_points={
        'console_scripts': ['urban-video = urban_video.cli:run'],
    },
)

setup(**args)
