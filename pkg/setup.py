# _*_ coding: utf-8 _*_

import os
import re

from setuptools import setup, find_packages

package_name = 'cavitysta'

# Read version without importing cavitysta (which has dependencies not yet installed)
version_file = os.path.join(os.path.dirname(__file__), package_name, 'version.py')
with open(version_file) as f:
    text = f.read()
    parts = {name: re.search(rf"_{name}_version = ['\"]([^'\"]*)['\"]", text) for name in ('major', 'minor', 'patch')}
    major_version, minor_version, patch_version = (m.group(1) if m else "0" for m in parts.values())

setup(
    name=package_name,
    version=f"{major_version}.{minor_version}.{patch_version}",
    description="Shortcut-to-adiabaticity simulator for two Lambda-type atoms in a two-mode cavity.",
    packages=find_packages(exclude=('tests', 'tests.*', 'examples', 'examples.*')),
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',

    install_requires=[
        'numpy<2',
        'scipy>=1.10',
        'pandas>=2.0.0',
        'pydantic==2.5.0',
        'python-dotenv==1.0.0',
    ],
    extras_require={
        'test': ['pytest==7.4.3'],
    },
    entry_points={
        'console_scripts': ['cavitysta=cavitysta.cli:main'],
    },

    classifiers=[
        'Programming Language :: Python :: 3',
        'Operating System :: OS Independent',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    python_requires='>=3.9',
)
