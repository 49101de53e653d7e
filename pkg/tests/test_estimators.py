import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from cue_spectra.estimators import MesoscopicLinearStatistic, SelbergDecompositionTransformer
from cue_spectra.logderiv import MesoscopicSpec, s_n
from cue_spectra.sampler import sample_cue_angles
from cue_spectra.selberg import decompose


@pytest.fixture(scope="module")
def spectra():
    return sample_cue_angles(16, 0, 50)


def test_linear_statistic_columns(spectra):
    out = MesoscopicLinearStatistic(l=4).fit_transform(spectra)
    spec = MesoscopicSpec(16, 4)
    assert out.shape == (50, 2)
    assert np.allclose(out[:, 0] + 1j * out[:, 1], s_n(spectra, spec))


def test_default_scale_is_sqrt(spectra):
    assert MesoscopicLinearStatistic().fit(spectra).spec_.l == 4


def test_decomposition_columns(spectra):
    out = SelbergDecompositionTransformer(c=0.5).fit_transform(spectra)
    parts = decompose(spectra, 1.0, 0.5)
    assert np.allclose(out, np.abs(np.column_stack([parts.local_sum, parts.error, parts.full])))


def test_unfitted_and_shape_mismatch(spectra):
    with pytest.raises(NotFittedError):
        MesoscopicLinearStatistic().transform(spectra)
    est = MesoscopicLinearStatistic().fit(spectra)
    with pytest.raises(ValueError):
        est.transform(spectra[:, :8])


def test_parameter_validation(spectra):
    with pytest.raises(ValueError):
        SelbergDecompositionTransformer(c=2.0).fit(spectra)
    with pytest.raises(ValueError):
        SelbergDecompositionTransformer(z=0.5).fit(spectra)
    with pytest.raises(ValueError):
        MesoscopicLinearStatistic().fit(spectra * 2)


def test_pipeline_and_clone(spectra):
    pipe = make_pipeline(SelbergDecompositionTransformer(c=0.25, z=0.99), StandardScaler())
    out = pipe.fit_transform(spectra)
    assert out.shape == (50, 3)
    params = clone(pipe).get_params()
    assert params["selbergdecompositiontransformer__c"] == 0.25
    assert list(pipe[0].get_feature_names_out()) == ["abs_local", "abs_error", "abs_full"]
