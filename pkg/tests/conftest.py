import sys
import os
import json

import pytest

# Incluir o diretório src no PYTHONPATH para testes
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src')))

SAMPLES_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'data', 'samples'))


@pytest.fixture
def samples_dir():
    return SAMPLES_DIR


@pytest.fixture
def write_doc(tmp_path):
    """Grava um documento JSON em tmp_path e devolve o caminho como str."""
    def _write(name, document):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding='utf-8')
        return str(path)
    return _write
