from setuptools import setup

setup( 
    name='flist', 
    version='0.1.0', 
    description='Inverse scattering, soliton and long-time asymptotics toolkit for the focusing Fokas-Lenells equation.',
    long_description=open("README.rst", 'r').read(),
    packages=['flist'], 
    python_requires='>=3.9',
    install_requires=['numpy>=1.22', 'scipy>=1.8'],
    entry_points={'console_scripts': ['fl-ist=flist.cli:main']},
) 
