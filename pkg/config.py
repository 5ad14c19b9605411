import os
from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("BREATHSIM_LOG_LEVEL", "INFO")
DEFAULT_SEED = int(os.getenv("BREATHSIM_SEED", "0"))

# Operating point of the newborn recordings
WINDOW_S = float(os.getenv("BREATHSIM_WINDOW_S", "10"))
OVERLAP = float(os.getenv("BREATHSIM_OVERLAP", "0.95"))
ETA_UV = float(os.getenv("BREATHSIM_ETA_UV", "400"))
APNEA_RATE_HZ = float(os.getenv("BREATHSIM_APNEA_RATE_HZ", "0.1"))
ROC_THRESHOLDS = int(os.getenv("BREATHSIM_ROC_THRESHOLDS", "100"))

# RR bounds in Hz; the movement sentinel defaults to
# max(MOVEMENT_RATE_HZ, MOVEMENT_RATIO x R_H)
MOVEMENT_RATE_HZ = 10.0
MOVEMENT_RATIO = 10.0
PRESETS = {
    "newborn": {"r_low": 0.4, "r_high": 1.5},
    "adult": {"r_low": 0.2, "r_high": 0.333},
}

N_STATES = 5
TOLERANCE_FRACTION = 0.15  # correct RR within ±15%
MIN_EVENT_S = 10.0  # shorter absences are respiratory pauses
SEVERE_EVENT_S = 20.0

# Manikin servo range
SERVO_MIN_RATE_HZ = 0.033
SERVO_MAX_RATE_HZ = 3.33
