"""
구조/하이퍼파라미터 프리셋

audioset : 인코더 d->256(x)|512(y)->256, 분류기 256->C, 번역기 256->128->64->128->256
wikipedia: 인코더 d->2048->1024, 분류기 1024->C, 번역기 1024->512->1024
pascal   : wikipedia와 같은 구조, 손실 가중치만 다름
"""

from app.domain.errors import ConfigError
from app.schemas.architecture import ArchPreset, PresetName, SubnetArch
from app.schemas.training import LossWeights, Stage2Config, StageConfig, Subnet, TrainConfig

# 프리셋별 2단계 손실 가중치 (alpha, beta, gamma, delta)
PRESET_WEIGHTS: dict[PresetName, tuple[float, float, float, float]] = {
    PresetName.AUDIOSET: (1.0, 1.0, 1.0, 1.0),
    PresetName.WIKIPEDIA: (10.0, 1.0, 1000.0, 100.0),
    PresetName.PASCAL: (10.0, 1.0, 1e-2, 1.0),
    PresetName.CUSTOM: (1.0, 1.0, 1.0, 1.0),
}

# 1단계 이후 학습률을 거의 0으로 낮추는 원래 일정 (설정으로만 사용)
NEAR_ZERO_STAGE2_LR = 1e-10


def resolve_architecture(
    preset: ArchPreset,
    num_classes: int,
    d1: int,
    d2: int,
) -> dict[Subnet, SubnetArch]:
    """
    프리셋을 서브네트워크별 구조로 풉니다.

    Raises:
        ConfigError: custom 구조가 입력 차원/클래스 수와 맞지 않을 때
    """
    name = PresetName(preset.name)

    if name == PresetName.AUDIOSET:
        embed = 256
        arch = {
            Subnet.E_X: SubnetArch(dims=[d1, 256, embed]),
            Subnet.E_Y: SubnetArch(dims=[d2, 512, embed]),
            Subnet.C_X: SubnetArch(dims=[embed, num_classes]),
            Subnet.C_Y: SubnetArch(dims=[embed, num_classes]),
            Subnet.T_XY: SubnetArch(dims=[embed, 128, 64, 128, embed]),
            Subnet.T_YX: SubnetArch(dims=[embed, 128, 64, 128, embed]),
        }
    elif name in (PresetName.WIKIPEDIA, PresetName.PASCAL):
        embed = 1024
        arch = {
            Subnet.E_X: SubnetArch(dims=[d1, 2048, embed]),
            Subnet.E_Y: SubnetArch(dims=[d2, 2048, embed]),
            Subnet.C_X: SubnetArch(dims=[embed, num_classes]),
            Subnet.C_Y: SubnetArch(dims=[embed, num_classes]),
            Subnet.T_XY: SubnetArch(dims=[embed, 512, embed]),
            Subnet.T_YX: SubnetArch(dims=[embed, 512, embed]),
        }
    else:
        arch = {subnet: getattr(preset, subnet.value) for subnet in Subnet}
        _check_custom(arch, num_classes, d1, d2)

    return arch


def _check_custom(arch: dict[Subnet, SubnetArch], num_classes: int, d1: int, d2: int) -> None:
    dims = {subnet: a.dims for subnet, a in arch.items()}
    x_space = dims[Subnet.E_X][-1]
    y_space = dims[Subnet.E_Y][-1]

    checks = [
        (dims[Subnet.E_X][0] == d1, f"E_x 입력 {dims[Subnet.E_X][0]} != d1 {d1}"),
        (dims[Subnet.E_Y][0] == d2, f"E_y 입력 {dims[Subnet.E_Y][0]} != d2 {d2}"),
        (x_space == y_space, f"x 공간 {x_space} != y 공간 {y_space} (번역기는 정방 사상이어야 함)"),
        (dims[Subnet.C_X][0] == x_space, f"C_x 입력 {dims[Subnet.C_X][0]} != x 공간 {x_space}"),
        (dims[Subnet.C_Y][0] == y_space, f"C_y 입력 {dims[Subnet.C_Y][0]} != y 공간 {y_space}"),
        (dims[Subnet.C_X][-1] == num_classes, f"C_x 출력 {dims[Subnet.C_X][-1]} != C {num_classes}"),
        (dims[Subnet.C_Y][-1] == num_classes, f"C_y 출력 {dims[Subnet.C_Y][-1]} != C {num_classes}"),
        (dims[Subnet.T_XY][0] == x_space and dims[Subnet.T_XY][-1] == y_space, "T_xy 입출력 불일치"),
        (dims[Subnet.T_YX][0] == y_space and dims[Subnet.T_YX][-1] == x_space, "T_yx 입출력 불일치"),
    ]
    errors = [message for ok, message in checks if not ok]
    if errors:
        raise ConfigError("custom 프리셋 구조 오류: " + "; ".join(errors))


def preset_defaults(name: PresetName | str, seed: int = 7) -> TrainConfig:
    """
    프리셋별 기본 학습 설정

    학습률은 모든 프리셋에서 1e-4 입니다. 2단계 학습률은 기본 1e-4이며,
    NEAR_ZERO_STAGE2_LR(1e-10)로 바꾸면 원래 일정이 재현됩니다.
    """
    name = PresetName(name)
    alpha, beta, gamma, delta = PRESET_WEIGHTS[name]
    return TrainConfig(
        stage1=StageConfig(lr=1e-4),
        stage2=Stage2Config(
            lr=1e-4,
            weights=LossWeights(alpha=alpha, beta=beta, gamma=gamma, delta=delta),
        ),
        seed=seed,
    )
