from dampedmaps.models.quantization.damped import (
    QuantizedSystem,
    damped_propagator,
    damping_symbol,
    spectrum,
)
from dampedmaps.models.quantization.metaplectic import (
    determine_egorov_convention,
    egorov_overlap,
    metaplectic_propagator,
)
from dampedmaps.models.quantization.translation import (
    TranslationOperator,
    translation_operator,
)
from dampedmaps.models.quantization.weyl import weyl_quantize
