import numpy as np
import pytest

from ctmc.generator import GeneratorMatrix
from quantizer.state_space import StateSpace, preset_bounds
from respiration.records import PneumogramRecord

R_M = 15.0  # default for the newborn preset, 10 x R_H

# five-state model of a newborn with apnea episodes: apnea, three breathing
# levels and movement
APNEA_PATIENT_RATES = [0.0, 0.5, 0.9, 1.32, R_M]
APNEA_PATIENT_LAMBDA = [
    [-0.188785, 0.08972, 0.04486, 0.042991, 0.011215],
    [0.047083, -0.203685, 0.073695, 0.071648, 0.011259],
    [0.014614, 0.080376, -0.22547, 0.127349, 0.003132],
    [0.007717, 0.019756, 0.036734, -0.066677, 0.00247],
    [0.042272, 0.02642, 0.002642, 0.002642, -0.073976],
]
APNEA_PATIENT_PI = [0.08788, 0.16048, 0.15736, 0.53211, 0.06217]

# same patient class without apnea: four breathing levels and movement
HEALTHY_RATES = [0.44, 0.74, 1.04, 1.33, R_M]
HEALTHY_LAMBDA = [
    [-0.205567, 0.124197, 0.059957, 0.004283, 0.017131],
    [0.020036, -0.080859, 0.047943, 0.003578, 0.009302],
    [0.014957, 0.071581, -0.108974, 0.014957, 0.007479],
    [0.015873, 0.047619, 0.206349, -0.317460, 0.047619],
    [0.003656, 0.007313, 0.006399, 0.0, -0.017367],
]
HEALTHY_PI = [0.05644, 0.32998, 0.22677, 0.01516, 0.37164]

# six-state fit with five breathing levels
SIX_STATE_RATES = [0.41, 0.65, 0.88, 1.11, 1.35, R_M]
SIX_STATE_LAMBDA = [
    [-0.263566, 0.093023, 0.015504, 0.015504, 0.031008, 0.108527],
    [0.015102, -0.133765, 0.084142, 0.006472, 0.002157, 0.025890],
    [0.005735, 0.061649, -0.131900, 0.035842, 0.0, 0.028674],
    [0.007828, 0.003914, 0.101761, -0.164384, 0.027397, 0.023483],
    [0.0, 0.0, 0.067227, 0.100840, -0.201681, 0.033613],
    [0.002723, 0.008850, 0.013615, 0.005446, 0.000681, -0.031314],
]
SIX_STATE_PI = [0.02143, 0.1547, 0.22708, 0.08513, 0.01818, 0.49348]


@pytest.fixture
def newborn():
    return preset_bounds("newborn", R_M)


@pytest.fixture
def apnea_patient(newborn):
    ss = StateSpace(np.array(APNEA_PATIENT_RATES), True, True, newborn)
    return GeneratorMatrix.from_off_diagonal(APNEA_PATIENT_LAMBDA), ss


@pytest.fixture
def healthy_patient(newborn):
    ss = StateSpace(np.array(HEALTHY_RATES), False, True, newborn)
    return GeneratorMatrix.from_off_diagonal(HEALTHY_LAMBDA), ss


@pytest.fixture
def six_state_patient(newborn):
    ss = StateSpace(np.array(SIX_STATE_RATES), False, True, newborn)
    return GeneratorMatrix.from_off_diagonal(SIX_STATE_LAMBDA), ss


def tone(freq, duration, sample_rate=32.0, amplitude=1.0, offset=0.0, phase=0.0):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return offset + amplitude * np.cos(2 * np.pi * freq * t + phase)


def tone_record(freq, duration, sample_rate=32.0, amplitude=300.0):
    return PneumogramRecord(tone(freq, duration, sample_rate, amplitude), sample_rate)
