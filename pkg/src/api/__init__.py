"""API 接口模块"""
