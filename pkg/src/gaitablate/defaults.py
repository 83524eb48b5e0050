"""Every numeric default in one place; echoed into each result record."""

DEFAULTS = {
    "contact_threshold_n": 20.0,
    "contact_debounce_samples": 10,
    "mocap_rate_hz": 250.0,
    "force_rate_hz": 1000.0,
    "stride_frames": 100,
    "resample_frames": 10,
    "smoothing_windows": [1, 3],
    "macro_steps_mm": [100, 1000],
    "micro_moduli_mm": [1, 10, 100],
    "sinusoid_components": 4,
    "sinusoid_freq_grid": [0.25, 4.0, 0.01],
    "train_fraction": 0.75,
    "repetitions": 10,
    "cv_folds": 10,
    "pca_variance_fraction": 0.95,
    "svm_C_values": [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
    "svm_gamma_factors": [0.1, 1.0, 10.0],
    "svm_kkt_tol": 1e-3,
    "svm_max_kernel_evals": 10**7,
    "pld_azimuth_deg": 45.0,
}
