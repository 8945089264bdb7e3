"""Nonlinear sensors, schedules, and their stacked block matrices.

Sensors carry a measurement map, an analytic Jacobian, and SPD Gaussian
noise. A schedule is a per-step set of selected sensor indices; the
stacked Jacobian and noise covariance are built by row gathering, never
by materializing a selection matrix.
"""

import numpy as np

import sensorsched as ss

suite = ss.SensorSuite(
    state_dim=2,
    sensors=(
        ss.builtin_sensor("linear_coordinate", axis=0, noise_var=0.5),
        ss.builtin_sensor("range", anchor=[0.0, 0.0], noise_var=0.2),
        ss.builtin_sensor("bearing", anchor=[5.0, 0.0], noise_var=0.1),
        ss.builtin_sensor("quadratic", weight=np.eye(2), noise_var=1.0),
    ),
)

x = np.array([3.0, 4.0])
for sensor in suite.sensors:
    z = sensor.measure_at(x)
    J = sensor.jacobian_at(x)
    print(f"{sensor.name:22s} g(x) = {z[0]:+.4f}   jacobian = {np.array_str(J[0], precision=3)}")

# analytic jacobians agree with central finite differences
fd = ss.finite_difference_jacobian(suite.sensors[1].measure, x)
print("\nrange sensor FD check:", np.allclose(fd, suite.sensors[1].jacobian_at(x), atol=1e-6))

# schedules: per-step index sets under budgets
schedule = ss.Schedule(sets=((1, 2), (), (0,)), budgets=(2, 2, 2))
print("\nschedule sets:", schedule.sets)

linearization = np.array([3.0, 4.0, 1.0, 1.0, -2.0, 0.5])
C = ss.stacked_jacobian(suite, schedule, linearization)
R = ss.stacked_noise_cov(suite, schedule)
print("stacked jacobian block rows:", C.row_dims, "(empty step contributes 0 rows)")
print("stacked noise covariance:")
print(np.array_str(R.assemble(), precision=3))

# budget and duplicate violations are rejected at construction
try:
    ss.Schedule(sets=((0, 1, 2),), budgets=(2,))
except ss.DimensionMismatchError as exc:
    print("\nover budget:", exc)
try:
    ss.Schedule(sets=((1, 1),), budgets=(3,))
except ss.DimensionMismatchError as exc:
    print("duplicate:  ", exc)
