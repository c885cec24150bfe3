from ensemble.counting import (EsyBound, MinorSpectrum, eigenvector_weight_formula, esy_counting_bound, interlacing_gaps,
                               interval_count_gap, minor_spectra, resolvent_diag_schur, summarize_minor_checks)
from ensemble.matrix import WignerLevyMatrix
from ensemble.spectrum import SpectralData, eigenvalues, spectrum

__all__ = ['EsyBound', 'MinorSpectrum', 'SpectralData', 'WignerLevyMatrix', 'eigenvalues', 'eigenvector_weight_formula', 'esy_counting_bound',
           'interlacing_gaps', 'interval_count_gap', 'minor_spectra', 'resolvent_diag_schur', 'spectrum', 'summarize_minor_checks']
