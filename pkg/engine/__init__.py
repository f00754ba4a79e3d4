"""
Engine module for the multigram index
Index artifacts, synthetic data, the pipeline class and the experiment harness
"""

from .index_store import IndexArtifact, build_index, load_index, save_index
from .pipeline import MultigramPipeline, select_grams

__all__ = ['IndexArtifact', 'build_index', 'load_index', 'save_index',
           'MultigramPipeline', 'select_grams']
