"""보정 잔차: 보정된 이벤트가 실제 edge 에서 얼마나 퍼져 있는가"""
import numpy as np

from src.events.model import EventStream
from src.translate.scene import EdgeGeometry
from src.utils.errors import EmptyStream, NoEdges
from src.utils.logger import get_logger

logger = get_logger(__name__)


def compensation_error(stream: EventStream, edges: EdgeGeometry,
                       max_distance: float | None = None) -> float:
    """가장 가까운 edge 까지의 부호 있는 수직 거리의 표준편차 (모집단, px)

    max_distance 를 주면 그보다 먼 이벤트(노이즈)는 제외한다.
    """
    if not len(edges):
        raise NoEdges("비교할 ground-truth edge 가 없습니다")
    if not len(stream):
        raise EmptyStream("잔차를 계산할 이벤트가 없습니다")
    signed = edges.signed_distance(stream.x, stream.y)
    if max_distance is not None:
        signed = signed[np.abs(signed) <= max_distance]
        if not len(signed):
            raise EmptyStream(f"edge 로부터 {max_distance}px 안에 이벤트가 없습니다")
    spread = float(np.std(signed))
    logger.debug(f"📏 보정 잔차 σ={spread:.3f}px (이벤트 {len(signed)}개)")
    return spread
