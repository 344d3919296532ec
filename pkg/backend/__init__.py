# Backend package 