"""Tests for the MAC simulator"""
