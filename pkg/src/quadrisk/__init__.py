"""quadrisk: requisitos de quadrante, agregação de cenários e medidas de risco."""

__version__ = "0.1.0"
