"""Python 客户端示例（需要先启动 server.py）"""
from typing import Dict, List, Optional

import httpx


class EPRBClient:
    """EPRB 约束分析服务客户端"""

    def __init__(self, base_url: str = "http://localhost:8000", timeout: float = 300.0):
        self.client = httpx.Client(base_url=base_url, timeout=timeout)

    def _get(self, path: str) -> Dict:
        response = self.client.get(path)
        response.raise_for_status()
        return response.json()

    def _post(self, path: str, payload: Dict):
        response = self.client.post(path, json=payload)
        response.raise_for_status()
        return response.json()

    def get_status(self) -> Dict:
        return self._get("/")

    def rank(self) -> Dict:
        return self._get("/rank")

    def box(self, name: str) -> Dict:
        """生成典型行为，返回块形式的 JSON"""
        return self._get(f"/box/{name}")

    def check(self, behavior: Dict, tol: Optional[float] = None) -> Dict:
        """
        校验行为

        Args:
            behavior: 块形式或展平形式的行为
            tol: 校验容差

        Returns:
            校验、局域性与 Hardy 分析结果
        """
        return self._post("/check", {"behavior": behavior, "tol": tol})

    def hardy(self, behavior: Dict, hardy_set: Optional[str] = None) -> List[Dict]:
        return self._post("/hardy", {"behavior": behavior, "set": hardy_set})

    def solve(self, free_set: Dict, exhaustive: bool = False) -> Dict:
        return self._post("/solve", {"free_set": free_set, "exhaustive": exhaustive})

    def model(self, model: Dict, tol: Optional[float] = None) -> Dict:
        """由量子模型 JSON 按 Born 规则生成行为"""
        return self._post("/model", {"model": model, "tol": tol})

    def optimize(self, kind: str, **options) -> Dict:
        """kind: chsh | hardy | ghz；options 为 restarts、seed、state_class 等"""
        return self._post(f"/optimize/{kind}", options)


def main():
    """示例用法"""
    client = EPRBClient()

    print("=== 系统状态 ===")
    print(client.get_status())

    print("\n=== 系数矩阵的秩 ===")
    print(client.rank()["rank"])

    print("\n=== 校验 PR 盒 ===")
    result = client.check(client.box("pr"))
    locality = result["locality"]
    print(f"校验通过: {result['validation']['passed']}")
    print(f"局域: {locality['local']}，{locality['witness']['expression']} = {locality['witness']['value']}")

    print("\n=== Hardy 分析（PR 盒第二种变体） ===")
    for report in client.hardy(client.box("pr2"), "8g"):
        print(f"{report['witness_name']} = {report['witness']} → {report['classification']}")

    print("\n=== Hardy 概率最大值 ===")
    result = client.optimize("hardy", restarts=8)
    print(f"p13 = {result['witness']:.10f}，|Δ| = {result['delta_abs']:.10f}，{result['status']}")


if __name__ == "__main__":
    main()
