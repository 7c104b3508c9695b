"""Low-delay bearing fault diagnosis from WPT-FFT dominant-frequency features."""

__version__ = "0.1.0"

from .signal import (  # noqa: E402
    FaultSynthesisSpec,
    SignalSegment,
    segment_duration,
    segment_signal,
    synthesize_bearing_signal,
)
from .wavelets import WaveletFilterPair, wavelet_filters  # noqa: E402
from .wpt import PacketTree, reconstruct_leaves, wpt_decompose  # noqa: E402
from .spectrum import AmplitudeSpectrum, SpectralPeak, amplitude_spectrum, top_m_peaks  # noqa: E402
from .features import FeatureVector, baseline_features, extract_feature_matrix, extract_features  # noqa: E402
from .selection import (  # noqa: E402
    SelectionScore,
    coefficient_energy,
    coefficient_entropy,
    energy_entropy_ratio,
    select_wavelet_and_level,
)
from .bench import DelayReport, delay_sweep, measure_processing_time, system_delay  # noqa: E402
