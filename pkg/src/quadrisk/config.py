"""
Módulo de configuração para o projeto.
Carrega variáveis do arquivo .env, configura loguru e define os parâmetros
padrão de execução (seed, orçamento de Monte Carlo, multiplicador de confiança).
"""

import os
import sys
from pathlib import Path

from dotenv import load_dotenv
from loguru import logger

# -----------------------------------------------------------------------------
# 1) Carrega variáveis do .env
# -----------------------------------------------------------------------------
load_dotenv()


# -----------------------------------------------------------------------------
# 2) Configurações de ambiente e sistema
# -----------------------------------------------------------------------------
ENVIRONMENT = os.getenv("ENVIRONMENT", "production")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_TO_FILE = os.getenv("LOG_TO_FILE", "false").lower() == "true"

# -----------------------------------------------------------------------------
# 3) Parâmetros de execução (CLI e verificação de requisitos)
# -----------------------------------------------------------------------------
DEFAULT_SEED = int(os.getenv("QUADRISK_SEED", "20120816"))
DEFAULT_MC_BUDGET = int(os.getenv("QUADRISK_MC_BUDGET", "1000000"))
DEFAULT_CONFIDENCE_Z = float(os.getenv("QUADRISK_CONFIDENCE_Z", "3.0"))

# Tamanho fixo dos chunks de amostragem: a saída concatenada não depende
# do número de workers, apenas de (seed, índice do chunk)
MC_CHUNK_SIZE = int(os.getenv("QUADRISK_MC_CHUNK", "131072"))
MC_WORKERS = int(os.getenv("QUADRISK_MC_WORKERS", "1"))

MIN_MC_BUDGET = 1000

# -----------------------------------------------------------------------------
# 4) Definição de PATHs
# -----------------------------------------------------------------------------
# PROJ_ROOT assume que o config.py está em "src/quadrisk/config.py"
PROJ_ROOT = Path(__file__).resolve().parents[2]

DATA_SUBFOLDER = os.getenv("DATA_SUBFOLDER", "data")
LOGS_SUBFOLDER = os.getenv("LOGS_SUBFOLDER", "logs")

DATA_DIR = PROJ_ROOT / DATA_SUBFOLDER
SAMPLES_DIR = DATA_DIR / "samples"
LOGS_DIR = PROJ_ROOT / LOGS_SUBFOLDER


# -----------------------------------------------------------------------------
# 5) Configuração de logging (usando loguru)
# -----------------------------------------------------------------------------
logger.remove()

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)

# Console em stderr: stdout fica reservado para os relatórios JSON
logger.add(
    sink=sys.stderr,
    level=LOG_LEVEL,
    format=LOG_FORMAT,
)

# Arquivo de log (com rotação de 10 MB, compressão em zip), apenas sob demanda
if LOG_TO_FILE:
    LOGS_DIR.mkdir(parents=True, exist_ok=True)
    LOG_FILE_PATH = LOGS_DIR / "quadrisk.log"
    logger.add(
        str(LOG_FILE_PATH),
        level=LOG_LEVEL,
        format=LOG_FORMAT,
        rotation="10 MB",
        compression="zip",
        enqueue=True
    )

logger.debug(f"ENVIRONMENT={ENVIRONMENT}, LOG_LEVEL={LOG_LEVEL}, PROJ_ROOT={PROJ_ROOT}")
logger.debug(f"DEFAULT_SEED={DEFAULT_SEED}, DEFAULT_MC_BUDGET={DEFAULT_MC_BUDGET}, "
             f"DEFAULT_CONFIDENCE_Z={DEFAULT_CONFIDENCE_Z}, MC_CHUNK_SIZE={MC_CHUNK_SIZE}")


# -----------------------------------------------------------------------------
# 6) Funções auxiliares
# -----------------------------------------------------------------------------
def init_config() -> None:
    """
    Função opcional a ser chamada no início do projeto para
    garantir que este módulo seja carregado.
    """
    logger.debug("init_config() chamado. Configurações já foram carregadas.")


def set_log_level(level: str) -> None:
    """
    Reconfigura o sink de console com um novo nível (usado pela opção --log-level da CLI).

    Args:
        level (str): Nível do loguru ("DEBUG", "INFO", "WARNING", ...).
    """
    logger.remove()
    logger.add(sink=sys.stderr, level=level.upper(), format=LOG_FORMAT)
    if LOG_TO_FILE:
        logger.add(
            str(LOGS_DIR / "quadrisk.log"),
            level=level.upper(),
            format=LOG_FORMAT,
            rotation="10 MB",
            compression="zip",
            enqueue=True
        )
