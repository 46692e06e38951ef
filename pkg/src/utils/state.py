"""전역 실행 상태 관리 (seed, 작업 스레드 수)"""
import numpy as np


class GlobalState:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            from src.utils.config import RUNTIME_CONFIG
            cls._instance = super(GlobalState, cls).__new__(cls)
            cls._instance.seed = RUNTIME_CONFIG["seed"]
            cls._instance.threads = max(1, RUNTIME_CONFIG["threads"])
        return cls._instance

    def set_seed(self, seed: int):
        if 0 <= seed < 2**64:
            self.seed = int(seed)

    def get_seed(self) -> int:
        return self.seed

    def set_threads(self, threads: int):
        if threads >= 1:
            self.threads = int(threads)

    def get_threads(self) -> int:
        return self.threads

    def rng(self, offset: int = 0) -> np.random.Generator:
        """seed 기반 난수 생성기 (offset 으로 용도별 스트림 분리)"""
        return np.random.default_rng([self.seed, offset])


state = GlobalState()
